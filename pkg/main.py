#!/usr/bin/env python3
"""
Dialogue Toolkit - Main Entry Point
Train and evaluate dialogue response generators with a semantic REINFORCE loss.
"""

import logging
import sys
from pathlib import Path

# Add the project root to Python path
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from core.cli import EXIT_RUNTIME, run
from core.state_manager import setup_logging


def main():
    """Main entry point for the command-line toolkit."""
    try:
        # Setup logging
        setup_logging()
        logger = logging.getLogger("main")
        logger.debug(f"Arguments: {sys.argv[1:]}")

        return run(sys.argv[1:])

    except Exception as e:
        logging.error(f"Critical error in main: {e}", exc_info=True)
        print(f"Critical error: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
