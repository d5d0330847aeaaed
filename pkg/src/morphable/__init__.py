# src/morphable/__init__.py
