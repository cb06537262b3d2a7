#!/usr/bin/env python3
"""
Wrapper script so the toolkit runs from a checkout without installing.
"""

import sys

import dotenv

# Load .env before importing the package so HJ_TOOLKIT_* overrides are visible
dotenv.load_dotenv()

from hj_toolkit.main import main

if __name__ == "__main__":
    sys.exit(main())
