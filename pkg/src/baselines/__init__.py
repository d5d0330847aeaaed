# src/baselines/__init__.py
