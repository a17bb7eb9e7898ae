"""Utility modules for closed-r3bp."""
