"""
Union Find - Disjoint-set forest used for connected components and 0-dim persistence
"""

from typing import List


class DisjointSet:
    """
    Disjoint-set forest over the elements {0, 1, .., size - 1}.

    Union by rank with iterative path compression. Each root also carries
    an arbitrary payload (the birth key for the elder rule).
    """

    def __init__(self, size: int):
        if size < 0:
            raise ValueError("DisjointSet size must be non-negative")
        self.parent: List[int] = list(range(size))
        self.rank: List[int] = [0] * size
        self.payload: List[object] = [None] * size

    def __len__(self) -> int:
        return len(self.parent)

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def merge(self, x: int, y: int) -> int:
        """
        Merge the sets of x and y.

        Returns:
            Root of the merged set (unchanged root if already joined)
        """
        x_root, y_root = self.find(x), self.find(y)
        if x_root == y_root:
            return x_root
        if self.rank[x_root] < self.rank[y_root]:
            x_root, y_root = y_root, x_root
        self.parent[y_root] = x_root
        if self.rank[x_root] == self.rank[y_root]:
            self.rank[x_root] += 1
        return x_root

    def count_roots(self, members) -> int:
        """Number of distinct sets among the given elements."""
        return len({self.find(int(m)) for m in members})
