"""Brownian cone-time sets, box-counting dimensions and KPZ dimension identities."""
