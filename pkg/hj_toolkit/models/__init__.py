"""
Data models for the HJ toolkit
"""
