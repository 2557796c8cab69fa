"""
MRJ Lab Source Package

This package contains all source code for the multiresource-job
scheduling simulator and its stability lab.
"""
