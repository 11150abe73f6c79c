"""
geoclust MCP Server Package

Stdio MCP server exposing the geoclust solvers, the exact oracle, the ball separator
and PARTITION as tools.
"""

from geoclust import __author__, __license__, __version__

__description__ = "MCP tool server for geoclust"

from .main import GeoclustMCPServer
from .tools import ClusteringToolkit

__all__ = [
    "GeoclustMCPServer",
    "ClusteringToolkit",
]

# Package metadata
PACKAGE_INFO = {
    "name": "geoclust-mcp-server",
    "version": __version__,
    "author": __author__,
    "description": __description__,
    "license": __license__,
    "tools": [
        "solve_sosfl",
        "solve_kmeans",
        "exact_oracle",
        "separate",
        "partition",
    ],
}


def get_server_info():
    """Get server package information"""
    return PACKAGE_INFO.copy()


def get_version():
    """Get current version"""
    return __version__
