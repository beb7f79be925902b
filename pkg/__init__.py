# config/__init__.py
"""Configuration package"""

# core/__init__.py
"""Tensor, image and weight container primitives"""

# services/__init__.py
"""Masking, sparse bodies, accounting, pipeline and bench services"""

# models/__init__.py
"""Pydantic spec and report models"""

# utils/__init__.py
"""Utility functions package"""

# api/__init__.py
"""Command-line package"""

# api/commands/__init__.py
"""Subcommand modules"""
