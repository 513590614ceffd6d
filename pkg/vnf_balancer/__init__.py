"""Migration versus replication of VNFs in data-center fabrics."""

__version__ = "0.1.0"
