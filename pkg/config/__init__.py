"""
Configuration module for the coarse geometry engine
"""

from .config import Config

__all__ = ['Config']
