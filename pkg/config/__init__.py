"""
Runtime configuration and structured logging
"""
