# src/main/__init__.py
