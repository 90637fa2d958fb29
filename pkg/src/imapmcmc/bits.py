"""Node sets encoded as Python int bitmasks (bit v set <=> node v in set)."""


def mask_of(nodes):
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def members(mask):
    """Ascending list of the nodes in ``mask``."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def popcount(mask):
    return mask.bit_count()
