"""Reference SplitMix64 + Lemire + Fisher-Yates, used to freeze tests/data/shuffle_golden.txt."""
import sys

M = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & M

    def next(self):
        self.state = (self.state + GAMMA) & M
        return mix64(self.state)

    def below(self, bound):
        m = self.next() * bound
        low = m & M
        if low < bound:
            threshold = (-bound % (1 << 64)) % bound
            while low < threshold:
                m = self.next() * bound
                low = m & M
        return m >> 64

    def shuffle(self, items):
        for i in range(len(items), 1, -1):
            j = self.below(i)
            items[i - 1], items[j] = items[j], items[i - 1]


SENTENCES = [
    "Anne is rough.",
    "Anne is blue.",
    "Cold people are rough.",
    "Rough people are young.",
    "If someone is rough and nice then they are green.",
    "All young people are cold.",
]

if __name__ == "__main__":
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    items = list(SENTENCES)
    SplitMix64(seed).shuffle(items)
    sys.stdout.write("".join(s + "\n" for s in items))
