"""
Main command-line entry point
"""
import argparse
import sys
from typing import List, Optional
import structlog
from pydantic import ValidationError

# Configuration and logging
from config.logging_config import setup_logging
from config.settings import ConfigManager, AppSettings

# Errors
from core.exceptions import AmsrError

# Commands
from api.commands import bench, flops, mask, psnr, sr, tools

logger = structlog.get_logger()

COMMAND_MODULES = [mask, sr, flops, bench, psnr, tools]

def configure_commands(subparsers):
    """Register every command module's subparsers"""
    for module in COMMAND_MODULES:
        module.register(subparsers)

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=AppSettings.PROG, description=AppSettings.DESCRIPTION)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {AppSettings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    configure_commands(subparsers)
    return parser

def main(argv: Optional[List[str]] = None) -> int:
    """Parse, dispatch and map failures to exit codes"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else AppSettings.EXIT_USAGE

    setup_logging(ConfigManager.get_log_level("INFO" if args.verbose else "WARNING"))
    ConfigManager.validate_environment()

    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error("Invalid options", command=args.command, error=str(e))
        print(f"{AppSettings.PROG}: error: {e}", file=sys.stderr)
        return AppSettings.EXIT_USAGE
    except AmsrError as e:
        logger.error("Command failed", command=args.command, error_type=type(e).__name__, error=str(e))
        print(f"{AppSettings.PROG}: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        # Unwritable output paths; unreadable inputs already surface as InputFormatError
        logger.error("File access failed", command=args.command, path=e.filename, error=str(e))
        print(f"{AppSettings.PROG}: error: {e}", file=sys.stderr)
        return AppSettings.EXIT_INPUT_FORMAT

if __name__ == "__main__":
    sys.exit(main())
