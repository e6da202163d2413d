import pytest

from selfstab import topology
from selfstab.kcluster import CkState


@pytest.fixture
def path5():
    """5-node path 0-1-2-3-4 rooted at 4, identity identifiers."""
    net = topology.generate("path", 5)
    tree = topology.build_spanning_tree(net, 4)
    ids = topology.identity_ids(5)
    return net, tree, ids


def path5_terminal_config(net, tree, ids):
    """Hand-derived terminal configuration of the path fixture at k=1.

    alpha (0,1,2,0,1); heads 1 and 4; cluster parents 0->1, 2->1, 3->4;
    declared heads (1,1,1,4,4).  Re-derived independently in
    test_kcluster via the oracle before being trusted here.
    """
    alphas = (0, 1, 2, 0, 1)
    parc_nodes = (1, None, 1, 4, None)  # peer the pointer leads to
    headcs = (1, 1, 1, 4, 4)
    states = []
    for p in net.all_nodes():
        target = parc_nodes[p]
        parc = None if target is None else net.channel_to(p, target)
        states.append(CkState(id=ids[p], par=tree.par[p], alpha=alphas[p],
                              parc=parc, headc=headcs[p]))
    return tuple(states)


@pytest.fixture
def path5_terminal(path5):
    net, tree, ids = path5
    return path5_terminal_config(net, tree, ids)
