"""Telnet application server for XML-defined screen workflows.

Screens (menu, info, input, single-option, multi-option) are defined in XML
or generated from flat tables, rendered to character terminals over Telnet,
and operator submissions are appended to a JSON-lines journal.  An HTTP
admin API exposes live sessions, screen mirroring, disconnect and reload.
"""

__version__ = "0.1.0"
