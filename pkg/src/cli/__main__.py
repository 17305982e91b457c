#!/usr/bin/env python3
"""
orthant-hjb - Standalone Entry Point
Runs one subcommand and exits with its status code
"""
import logging
import os
import sys

import colorama
from colorama import Fore, Style
from dotenv import load_dotenv

colorama.init(autoreset=False)


class ColorFormatter(logging.Formatter):
    """Custom formatter to add colors to log output"""

    def format(self, record):
        time_str = self.formatTime(record, self.datefmt)

        level_str = record.levelname
        if record.levelno >= logging.ERROR:
            colored_level = f"{Fore.RED}[{level_str}]{Style.RESET_ALL}"
        elif record.levelno >= logging.WARNING:
            colored_level = f"{Fore.YELLOW}[{level_str}]{Style.RESET_ALL}"
        elif record.levelno >= logging.INFO:
            colored_level = f"{Fore.GREEN}[{level_str}]{Style.RESET_ALL}"
        else:
            colored_level = f"{Fore.BLUE}[{level_str}]{Style.RESET_ALL}"

        message = record.getMessage()
        if record.exc_info:
            message = f"{message}\n{self.formatException(record.exc_info)}"
        colored_message = f"{Fore.WHITE}{message}{Style.RESET_ALL}"
        colored_time = f"{Fore.LIGHTBLACK_EX}[{time_str}]{Style.RESET_ALL}"

        return f"{colored_time} {colored_level} {colored_message}"


root_logger = logging.getLogger()
root_logger.setLevel(logging.INFO)

for handler in root_logger.handlers[:]:
    root_logger.removeHandler(handler)

console_handler = logging.StreamHandler(sys.stdout)
console_handler.setFormatter(ColorFormatter(datefmt="%H:%M:%S"))
root_logger.addHandler(console_handler)

logger = logging.getLogger(__name__)

from .commands import EXIT_USAGE, run

load_dotenv()

POSITIVE_INT_VARS = {
    "ORTHANT_HJB_THREADS": "Worker threads for batch parallelism",
    "ORTHANT_HJB_BATCH": "Monte Carlo paths per batch",
}


def validate_environment():
    """Validate the optional ORTHANT_HJB_* overrides"""
    bad_vars = []
    for var, description in POSITIVE_INT_VARS.items():
        raw = os.getenv(var)
        if raw is None:
            continue
        if not raw.isdigit() or int(raw) < 1:
            bad_vars.append(f"  {var}={raw!r}: {description} must be a positive integer")

    bitgen = os.getenv("ORTHANT_HJB_BITGEN")
    if bitgen is not None:
        import numpy as np

        if not hasattr(np.random, bitgen):
            bad_vars.append(f"  ORTHANT_HJB_BITGEN={bitgen!r}: not a numpy bit generator")

    if bad_vars:
        logger.error("Invalid environment variables:")
        for var in bad_vars:
            logger.error(var)
        logger.error("Fix or unset them in your .env file")
        raise ValueError("Invalid environment variables")

    logger.debug("Environment validation passed")


def main() -> int:
    try:
        validate_environment()
    except ValueError:
        return EXIT_USAGE
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
