# Synthetic city models
