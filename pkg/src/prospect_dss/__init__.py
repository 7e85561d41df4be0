"""Decision support for securities-prospectus eligibility checks."""

__version__ = "0.1.0"

STORE_ENV_VAR = "PROSPECT_DSS_STORE"
