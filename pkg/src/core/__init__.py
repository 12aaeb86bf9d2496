"""Core Package - Formats, Pipeline, Radar, Experiment"""
