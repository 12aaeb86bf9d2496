# OD network construction and analysis
