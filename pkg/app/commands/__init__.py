"""
Commands module for CavElim.
"""
