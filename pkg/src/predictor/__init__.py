# src/predictor/__init__.py
