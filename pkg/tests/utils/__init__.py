"""
Utility tests package
"""
