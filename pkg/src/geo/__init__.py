# Geodesy and zoning
