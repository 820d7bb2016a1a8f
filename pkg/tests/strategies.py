"""Hypothesis strategies for small route instances."""

from hypothesis import strategies as st

from mrfpreempt.model import RouteFlow, make_instance


@st.composite
def instances(draw, max_L=5, max_flows=6, max_span=None, classes=(1,)):
    L = draw(st.integers(1, max_L))
    n = draw(st.integers(0, max_flows))
    flows = []
    for k in range(1, n + 1):
        lo = draw(st.integers(1, L))
        top = L if max_span is None else min(L, lo + max_span - 1)
        hi = draw(st.integers(lo, top))
        bw = draw(st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
        flows.append(RouteFlow(k, draw(st.sampled_from(classes)), bw, lo, hi))
    free = draw(st.lists(st.sampled_from([0.0, 1.0, 2.0, 4.0]), min_size=L, max_size=L))
    c_new = draw(st.sampled_from([1.0, 2.0, 3.0]))
    return make_instance(L, flows, free, c_new, max(classes) + 1)


@st.composite
def instance_and_decisions(draw, **kw):
    inst = draw(instances(**kw))
    keys = sorted(inst.incidences())
    bits = draw(st.lists(st.integers(0, 1), min_size=len(keys), max_size=len(keys)))
    return inst, dict(zip(keys, bits))
