"""Writes data/glove.mini.100d.txt: seeded random 100-d vectors for the
generator vocabulary plus common function words. The vectors stand in for
pretrained GloVe rows so tests never need the full download."""
import random
import pathlib

NAMES = ["the bald eagle", "the tiger", "the bear", "the lion", "the wolf", "the crocodile",
         "the dinosaur", "the snake", "the leopard", "the cat", "the dog", "the mouse",
         "the rabbit", "the squirrel", "Anne", "Alan", "Bob", "Charlie", "Dave", "Erin",
         "Harry", "Gary", "Fiona"]
VERBS = ["likes", "chases", "needs", "visits", "attacks", "sees"]
ATTRS = ["kind", "quiet", "round", "nice", "smart", "dull", "rough", "lazy", "slow", "sleepy",
         "furry", "small", "cute", "lovely", "beautiful", "big", "strong", "awful", "fierce",
         "heavy", "high", "huge", "short", "thin", "little", "wealthy", "poor", "bad", "sad",
         "old", "young", "horrible", "powerful", "angry", "funny", "boring", "tired", "reckless",
         "clever", "cold", "green", "blue", "red", "white", "rough", "hot", "happy"]
TEMPLATE = ["if", "then", "and", "not", "is", "are", "does", "do", "all", "someone",
            "something", "they", "it", "people", "animals", "things", "the", "a", "an", "of",
            "to", "in", "that", "with", "for", "on", "as", "by", "at", "from", "be", "was",
            "were", "has", "have", "this", "or", "but", "no", "yes", "true", "false", "question",
            "answer", "rule", "fact"]
EXTRA = ["person", "animal", "eagle", "cat", "dog", "man", "woman", "child", "friend", "house",
         "tree", "water", "food", "park", "school", "city", "day", "night", "time", "way",
         "good", "new", "first", "last", "long", "great", "own", "other", "right", "left",
         "large", "next", "early", "important", "few", "public", "same", "able", "sun", "moon",
         "sky", "river", "mountain", "forest", "field", "garden", "road", "car", "book", "word",
         "hand", "eye", "head", "face", "world", "life", "home", "work", "place", "name",
         "bird", "fish", "horse", "cow", "pig", "sheep", "fox", "deer", "owl", "duck",
         "frog", "bee", "ant", "gentle", "calm", "brave", "wild", "tame", "loud", "soft",
         "hard", "fast", "dark", "light", "warm", "wet", "dry", "sharp"]


def main():
    tokens = []
    for group in (NAMES, VERBS, [v[:-1] for v in VERBS], ATTRS, TEMPLATE, EXTRA):
        for phrase in group:
            for t in phrase.lower().split():
                if t not in tokens:
                    tokens.append(t)
    rng = random.Random(0)
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "glove.mini.100d.txt"
    with open(out, "w", newline="\n") as f:
        for t in tokens:
            values = " ".join(f"{rng.gauss(0.0, 0.4):.5f}" for _ in range(100))
            f.write(f"{t} {values}\n")
    print(f"{len(tokens)} tokens -> {out}")


if __name__ == "__main__":
    main()
