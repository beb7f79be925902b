"""
Logging configuration for the AMSR engine
"""
import logging
import sys
import structlog

def setup_logging(level: str = "WARNING"):
    """Setup structured logging on stderr; stdout is kept for command results"""
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.JSONRenderer()
        ],
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level.upper(), logging.WARNING)),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False
    )

    return structlog.get_logger()
