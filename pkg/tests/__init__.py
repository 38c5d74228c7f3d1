"""
Test package for CavElim
"""
