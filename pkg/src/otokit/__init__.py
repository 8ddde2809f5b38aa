"""otokit: hearing test record management.

Encrypted local storage, diagnostic metric computation, standards-style
audiology charts, PDF report export, and a loopback HTTP service for the
browser UI.
"""

__version__ = "0.1.0"
