"""
Pydantic model specs, run options and FLOPs / bench reports
"""
