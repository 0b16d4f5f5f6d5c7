#!/usr/bin/env python3
"""
CLI Entry Point for susp

Can be invoked as: susp <command> [options]
"""

import sys


def main():
    """CLI entry point"""
    from susp.harness.main import main as harness_main

    sys.exit(harness_main())


if __name__ == "__main__":
    main()
