"""OD Network Toolkit - Source Package"""
__version__ = "1.0.0"
