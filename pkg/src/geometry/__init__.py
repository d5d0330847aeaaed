# src/geometry/__init__.py
