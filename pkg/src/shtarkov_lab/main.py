#!/usr/bin/env python3
"""
shtarkov-lab - exact minimax regret, Shtarkov sums and cNML from the command line
"""

import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load .env from the working directory, falling back to the project root
env_file = Path.cwd() / ".env"
if env_file.exists():
    load_dotenv(env_file)
else:
    load_dotenv(Path(__file__).parent.parent.parent / ".env")

# Configure structured logging with timestamps; stdout carries the report only
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

logging.basicConfig(
    level=logging.WARNING,
    format=LOG_FORMAT,
    datefmt=DATE_FORMAT,
    stream=sys.stderr,
)

logger = logging.getLogger(__name__)

from shtarkov_lab.cli.cli_setup import run  # noqa: E402


def main():
    """Main function to run one shtarkov-lab command."""
    try:
        sys.exit(run(sys.argv[1:]))
    except KeyboardInterrupt:
        logger.info("Interrupted")
        sys.exit(130)


if __name__ == "__main__":
    main()
