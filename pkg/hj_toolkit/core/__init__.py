"""
Core functionality for the HJ toolkit
"""
