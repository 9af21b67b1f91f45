"""platebank: perishable blood-bank inventory simulation with post-issue
returns, replenishment-policy fitting and KPI/ROC analysis."""

__version__ = "0.1.0"
