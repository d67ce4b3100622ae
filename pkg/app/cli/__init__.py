"""
Command-line drivers for the TKMA operator, the Admin User, requesters, the PIP
and the service provider operator. Run as ``python -m app.cli <command>``.
"""
