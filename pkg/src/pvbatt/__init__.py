"""PV-battery dispatch, profitability and variance attribution."""
