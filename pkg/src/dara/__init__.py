"""dara: data access request assistant.

Describe a provider's data-subject-access-request workflow once, in a DARPAL
document; store it in a versioned process repository; run it with one command
against any W3C-protocol browser-control server.
"""

__version__ = "0.1.0"
