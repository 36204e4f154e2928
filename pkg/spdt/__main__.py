"""
Entry point for running the CLI as a module: python -m spdt
"""
import sys

from spdt.cli import main

if __name__ == "__main__":
    sys.exit(main())
