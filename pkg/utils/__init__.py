"""
Helpers shared by the command modules
"""
