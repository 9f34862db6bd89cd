import io
import itertools
import random
import string

import pytest

from qrefine.filters import CandidatePool, candidate_pool
from qrefine.taxonomy import Taxonomy, load_taxonomy


def build_taxonomy(edges, instances, drop_cycles=False) -> Taxonomy:
    edges_text = "".join(f"{c}\t{p}\n" for c, p in edges)
    inst_text = "".join(f"{e}\t{t}\n" for e, t in instances)
    return load_taxonomy(
        io.StringIO(edges_text), io.StringIO(inst_text), drop_cycles=drop_cycles
    )


def balanced_tree(branching=5, depth=3):
    """Perfect b-ary type tree; each leaf type holds exactly one entity.

    Type names are letter paths ("cat-a", "cat-ab", ...) so no filter rule
    ever fires on them.
    """
    letters = string.ascii_lowercase[:branching]
    edges = []
    instances = []

    def grow(path):
        name = f"cat-{path}" if path else "cat-root"
        if len(path) == depth:
            instances.append((f"ent-{path}", name))
            return
        for letter in letters:
            child_path = path + letter
            child = f"cat-{child_path}"
            edges.append((child, name))
            grow(child_path)

    grow("")
    return edges, instances


@pytest.fixture(scope="session")
def balanced125() -> Taxonomy:
    edges, instances = balanced_tree(5, 3)
    return build_taxonomy(edges, instances)


ACTION_GENRES = {
    "Martial arts films": ["f01", "f02", "f03", "f04"],
    "Action comedy films": ["f05", "f06", "f07", "f08"],
    "Action thriller films": ["f09", "f10", "f11", "f12"],
    "Spy films": ["f13", "f14", "f15", "f16"],
    "Science fiction action films": ["f17", "f18", "f19", "f20"],
}

ACTION_FILTERED_OUT = {
    "1990s action films": ["f01", "f05", "f09", "f13"],
    "American action films": ["f02", "f06", "f10"],
    "19th century action films": ["f03"],
}

ACTION_KEPT_EXTRA = {"Tomb Raider films": ["f17"]}


def action_films_taxonomy() -> Taxonomy:
    """20 answers under "Action films"; the five genre subtypes partition them."""
    subtype_members = {**ACTION_GENRES, **ACTION_FILTERED_OUT, **ACTION_KEPT_EXTRA}
    edges = [(sub, "Action films") for sub in subtype_members]
    instances = [(f"f{i:02d}", "Action films") for i in range(1, 21)]
    for sub, films in subtype_members.items():
        instances.extend((f, sub) for f in films)
    return build_taxonomy(edges, instances)


@pytest.fixture(scope="session")
def action_films() -> Taxonomy:
    return action_films_taxonomy()


# --- random solver instances -------------------------------------------------


def random_instance(rng: random.Random, k: int, planted: bool, max_n=24, max_k_count=10,
                    divisible=True):
    """A one-level taxonomy: root "q" with K candidate subtypes over n entities.

    ``planted`` seeds k candidates forming an exact equal partition. Returns
    (taxonomy, pool, subsets-by-name, entity names).
    """
    if divisible:
        n = k * rng.randint(1, max_n // k)
    else:
        n = rng.randint(k, max_n)
    big_k = rng.randint(k, max_k_count)
    entities = [f"e{i:02d}" for i in range(n)]
    subsets: list[set[str]] = []
    if planted:
        perm = entities[:]
        rng.shuffle(perm)
        size = n // k
        subsets.extend(set(perm[i * size:(i + 1) * size]) for i in range(k))
    while len(subsets) < big_k:
        size = rng.randint(0, n)
        subsets.append(set(rng.sample(entities, size)))
    rng.shuffle(subsets)
    names = [f"c{i:02d}" for i in range(big_k)]
    edges = [(name, "q") for name in names]
    instances = [(e, "q") for e in entities]
    for name, subset in zip(names, subsets):
        instances.extend((e, name) for e in sorted(subset))
    tax = build_taxonomy(edges, instances)
    by_name = dict(zip(names, [frozenset(s) for s in subsets]))
    return tax, candidate_pool(tax, "q"), by_name, entities


# --- definitional oracles (sets and counting only; no bit tricks) -----------


def oracle_cost(answer_sets, universe) -> int:
    coverage = {e: sum(1 for s in answer_sets if e in s) for e in universe}
    t1 = sum(abs(c - 1) for c in coverage.values())
    t2 = min(len(s) for s in answer_sets)
    return t1 - t2


def oracle_minimum(subsets, universe, k) -> int:
    return min(
        oracle_cost([subsets[i] for i in combo], universe)
        for combo in itertools.combinations(range(len(subsets)), k)
    )


def has_ideal_partition(subsets, universe, k) -> bool:
    n = len(universe)
    if n % k != 0:
        return False
    target = n // k
    for combo in itertools.combinations(range(len(subsets)), k):
        chosen = [subsets[i] for i in combo]
        if any(len(s) != target for s in chosen):
            continue
        if sum(len(s) for s in chosen) == n and len(set().union(*chosen)) == n:
            return True
    return False


def pool_of(tax: Taxonomy, q: str) -> CandidatePool:
    return candidate_pool(tax, q)
