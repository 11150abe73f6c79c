#!/usr/bin/env python3
"""
geoclust MCP Server
Exposes the clustering solvers, the exact oracle, the separator and PARTITION as MCP tools
over stdio.
"""

import asyncio
from typing import Any, Dict, List

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from geoclust.config import GeoclustConfig
from geoclust.experiment import to_json
from geoclust.log import configure_logging, get_logger

from .tools import ClusteringToolkit

logger = get_logger(__name__)

_POINTS_SCHEMA = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}},
    "description": "Points as rows of coordinates",
}

_SEARCH_PROPERTIES = {
    "swap_cap": {"type": "integer", "minimum": 1, "default": 3},
    "candidates": {
        "type": "string",
        "default": "auto",
        "description": "subset:K | sampled:NxS | grid:R | clients | auto",
    },
    "greedy": {"type": "boolean", "default": False,
               "description": "Accept any strict improvement"},
    "seed": {"type": "integer", "default": 0},
}


class GeoclustMCPServer:
    def __init__(self):
        self.server = Server("geoclust")
        self.config = GeoclustConfig()
        self.toolkit = ClusteringToolkit()

        # Setup handlers
        self._setup_handlers()

    def _tools(self) -> List[Tool]:
        return [
            Tool(
                name="solve_sosfl",
                description="Local search for sum-of-squares facility location",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "points": _POINTS_SCHEMA,
                        "f": {"type": "number", "exclusiveMinimum": 0,
                              "description": "Facility opening cost"},
                        "epsilon": {"type": "number", "default": 0.5},
                        **_SEARCH_PROPERTIES,
                    },
                    "required": ["points", "f"],
                },
            ),
            Tool(
                name="solve_kmeans",
                description="Bicriteria local search for k-means with ceil((1+5eps)k) centers",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "points": _POINTS_SCHEMA,
                        "k": {"type": "integer", "minimum": 1},
                        "epsilon": {"type": "number", "default": 0.2},
                        "initializer": {"type": "string",
                                        "enum": ["singleswap_surrogate", "d2_seeding"],
                                        "default": "singleswap_surrogate"},
                        **_SEARCH_PROPERTIES,
                    },
                    "required": ["points", "k"],
                },
            ),
            Tool(
                name="exact_oracle",
                description="Exact optimum for tiny instances by set-partition enumeration",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "points": _POINTS_SCHEMA,
                        "mode": {"type": "string", "enum": ["sosfl", "kmeans"]},
                        "f": {"type": "number"},
                        "k": {"type": "integer"},
                    },
                    "required": ["points", "mode"],
                },
            ),
            Tool(
                name="separate",
                description="Ball separator of a point set with a sampled contract check",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "points": _POINTS_SCHEMA,
                        "mu": {"type": "integer", "minimum": 1},
                        "seed": {"type": "integer", "default": 0},
                        "queries": {"type": "integer", "default": 1000},
                    },
                    "required": ["points", "mu"],
                },
            ),
            Tool(
                name="partition",
                description="PARTITION of a local and a global solution into local-swap parts",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "local": _POINTS_SCHEMA,
                        "global": _POINTS_SCHEMA,
                        "clients": _POINTS_SCHEMA,
                        "epsilon": {"type": "number", "default": 0.5},
                        "gamma": {"type": "number", "default": 64},
                        "alpha": {"type": "number", "default": 8},
                        "check": {"type": "boolean", "default": False},
                        "seed": {"type": "integer", "default": 0},
                    },
                    "required": ["local", "global"],
                },
            ),
        ]

    async def dispatch(self, name: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Run one tool by name"""
        if name == "solve_sosfl":
            return await self.toolkit.solve_sosfl(
                points=arguments["points"],
                f=arguments["f"],
                epsilon=arguments.get("epsilon", 0.5),
                swap_cap=arguments.get("swap_cap", self.config.get("local_search.swap_cap", 3)),
                candidates=arguments.get("candidates", "auto"),
                greedy=arguments.get("greedy", False),
                seed=arguments.get("seed", 0),
            )
        elif name == "solve_kmeans":
            return await self.toolkit.solve_kmeans(
                points=arguments["points"],
                k=arguments["k"],
                epsilon=arguments.get("epsilon", 0.2),
                swap_cap=arguments.get("swap_cap", self.config.get("local_search.swap_cap", 3)),
                candidates=arguments.get("candidates", "auto"),
                greedy=arguments.get("greedy", False),
                seed=arguments.get("seed", 0),
                initializer=arguments.get("initializer", "singleswap_surrogate"),
            )
        elif name == "exact_oracle":
            return await self.toolkit.exact_oracle(
                points=arguments["points"],
                mode=arguments["mode"],
                f=arguments.get("f"),
                k=arguments.get("k"),
            )
        elif name == "separate":
            return await self.toolkit.separate(
                points=arguments["points"],
                mu=arguments["mu"],
                seed=arguments.get("seed", 0),
                queries=arguments.get("queries", 1000),
            )
        elif name == "partition":
            return await self.toolkit.partition(
                local=arguments["local"],
                global_=arguments["global"],
                epsilon=arguments.get("epsilon", 0.5),
                gamma=arguments.get("gamma", self.config.get("partition.gamma", 64.0)),
                alpha=arguments.get("alpha", self.config.get("partition.alpha", 8.0)),
                clients=arguments.get("clients"),
                check=arguments.get("check", False),
                seed=arguments.get("seed", 0),
            )
        raise ValueError(f"Unknown tool: {name}")

    def _setup_handlers(self):
        """Setup all MCP handlers"""

        @self.server.list_tools()
        async def list_tools() -> List[Tool]:
            """List available tools"""
            return self._tools()

        @self.server.call_tool()
        async def call_tool(name: str, arguments: Dict[str, Any]) -> List[TextContent]:
            """Handle tool calls"""
            try:
                result = await self.dispatch(name, arguments or {})
                return [TextContent(type="text", text=to_json(result))]
            except Exception as e:
                logger.error("tool call failed", tool=name, error=str(e))
                return [TextContent(type="text", text=f"Error: {str(e)}")]


async def main():
    """Main entry point"""
    configure_logging(GeoclustConfig().get("runtime.log_level", "INFO"))
    logger.info("starting geoclust MCP server")

    mcp_server = GeoclustMCPServer()

    # Run the server
    async with stdio_server() as (read_stream, write_stream):
        await mcp_server.server.run(
            read_stream,
            write_stream,
            mcp_server.server.create_initialization_options()
        )


if __name__ == "__main__":
    asyncio.run(main())
