#!/usr/bin/env python3
"""
Integration Tests Package
End-to-end runs of the dps_lab command line
"""
