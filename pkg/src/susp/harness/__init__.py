"""
Harness Module

Command-line runner: configuration, train/eval/compare/gradcheck commands and result files.
"""
