"""
MCP Server Tools Implementation
"""

import asyncio
from typing import Any, Dict, List, Optional

from geoclust.candidates import CandidateStrategy
from geoclust.log import get_logger
from geoclust.oracle import exact_kmeans, exact_sosfl
from geoclust.partition import PartitionParams, run_partition, verify_partition
from geoclust.separator import SeparatorParams, sample_queries, separate, verify_contract
from geoclust.solver_kmeans import BicriteriaConfig, solve_kmeans_bicriteria
from geoclust.solver_sosfl import LocalSearchConfig, solve_sosfl

logger = get_logger(__name__)

Points = List[List[float]]


class ClusteringToolkit:
    """Solvers and checkers exposed as MCP tools"""

    async def solve_sosfl(self, points: Points, f: float, epsilon: float = 0.5, swap_cap: int = 3,
                          candidates: str = "auto", greedy: bool = False, seed: int = 0) -> Dict[str, Any]:
        """Local search for sum-of-squares facility location"""
        if not points:
            return {"error": "No points provided"}
        try:
            cfg = LocalSearchConfig(epsilon=epsilon, swap_cap=swap_cap, greedy=greedy, seed=seed,
                                    candidates=CandidateStrategy.parse(candidates))
            result = await asyncio.to_thread(solve_sosfl, points, f, cfg)
            return result.to_dict()
        except Exception as e:
            logger.error("solve_sosfl tool failed", error=str(e))
            return {"error": str(e)}

    async def solve_kmeans(self, points: Points, k: int, epsilon: float = 0.2, swap_cap: int = 3,
                           candidates: str = "auto", greedy: bool = False, seed: int = 0,
                           initializer: str = "singleswap_surrogate") -> Dict[str, Any]:
        """Bicriteria local search for k-means"""
        if not points:
            return {"error": "No points provided"}
        try:
            cfg = BicriteriaConfig(k=k, epsilon=epsilon, swap_cap=swap_cap, greedy=greedy, seed=seed,
                                   initializer=initializer,
                                   candidates=CandidateStrategy.parse(candidates))
            result = await asyncio.to_thread(solve_kmeans_bicriteria, points, cfg)
            return result.to_dict()
        except Exception as e:
            logger.error("solve_kmeans tool failed", error=str(e))
            return {"error": str(e)}

    async def exact_oracle(self, points: Points, mode: str, f: Optional[float] = None,
                           k: Optional[int] = None) -> Dict[str, Any]:
        """Exact optimum by set-partition enumeration"""
        if not points:
            return {"error": "No points provided"}
        try:
            if mode == "sosfl":
                if f is None:
                    return {"error": "f is required for mode sosfl"}
                result = await asyncio.to_thread(exact_sosfl, points, f)
            elif mode == "kmeans":
                if k is None:
                    return {"error": "k is required for mode kmeans"}
                result = await asyncio.to_thread(exact_kmeans, points, k)
            else:
                return {"error": f"Unknown oracle mode: {mode}"}
            return result.to_dict()
        except Exception as e:
            logger.error("exact_oracle tool failed", error=str(e))
            return {"error": str(e)}

    async def separate(self, points: Points, mu: int, seed: int = 0, queries: int = 1000) -> Dict[str, Any]:
        """Ball separator plus a sampled contract check"""
        if not points:
            return {"error": "No points provided"}
        try:
            result = await asyncio.to_thread(separate, points, mu, SeparatorParams(radius_jitter_seed=seed))
            contract = verify_contract(points, result, sample_queries(points, queries, seed + 1))
            return {**result.to_dict(), "contract": contract.to_dict()}
        except Exception as e:
            logger.error("separate tool failed", error=str(e))
            return {"error": str(e)}

    async def partition(self, local: Points, global_: Points, epsilon: float = 0.5,
                        gamma: float = 64.0, alpha: float = 8.0, clients: Optional[Points] = None,
                        check: bool = False, seed: int = 0) -> Dict[str, Any]:
        """PARTITION of a local and a global solution, optionally with its checks"""
        if not local or not global_:
            return {"error": "Both local and global solutions are required"}
        try:
            params = PartitionParams(alpha=alpha, gamma=gamma,
                                     separator=SeparatorParams(radius_jitter_seed=seed))
            out = await asyncio.to_thread(run_partition, local, global_, epsilon, params)
            payload = out.to_dict()
            if check:
                report = await asyncio.to_thread(verify_partition, clients or local, out, 1000, seed)
                payload["check"] = report.to_dict()
            return payload
        except Exception as e:
            logger.error("partition tool failed", error=str(e))
            return {"error": str(e)}
