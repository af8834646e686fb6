"""Smoke test for the fedflip extension module.

Build and run from the repository root:

    cargo build --release -p fedflip-py
    cp target/release/libfedflip.so python/fedflip.so
    python3 python/smoke_test.py
"""

import math

import fedflip


def main():
    data = fedflip.Dataset.synth(n_samples=400, seed=3, cluster_spread=2.0)
    assert len(data) == 400 and data.num_features == 784
    assert sum(data.class_counts()) == 400

    train, test = data.split(0.2, seed=3)
    assert (len(train), len(test)) == (320, 80)
    shards = train.partition(4, seed=3)
    assert sum(len(s) for s in shards) == len(train)

    poisoned, flipped = shards[0].flip_labels(14.0, seed=9)
    assert len(flipped) == len(shards[0]) * 14 // 100
    assert all(poisoned.labels[i] != shards[0].labels[i] for i in flipped)

    model = fedflip.Model.init(seed=1)
    probs = model.forward(test.features()[:2])
    assert all(abs(sum(row) - 1.0) < 1e-12 for row in probs)

    hyper = fedflip.HyperParams(comm_rounds=5, n_clients=4)
    fl = fedflip.run_federated(shards, test, hyper, seed=1, flip_percent=10.0)
    assert [h[0] for h in fl.history] == list(range(6))
    assert 0.0 <= fl.final_accuracy <= 1.0
    assert "weighted avg" in fl.report

    central = fedflip.run_centralized(train, test, hyper, seed=1)
    assert central.history[-1][1] < central.history[0][1]

    avg = fedflip.fed_average([fl.model, fl.model], [1.0, 3.0])
    assert avg.flatten() == fl.model.flatten()

    preds = fl.model.predict(test.features())
    cm = fedflip.confusion_matrix(preds, test.labels, 7)
    assert sum(map(sum, cm)) == len(test)
    print(fedflip.classification_report(preds, test.labels, 7))

    try:
        fedflip.HyperParams(comm_rounds=0)
        fedflip.run_federated(shards, test, fedflip.HyperParams(comm_rounds=0, n_clients=4), seed=1)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("zero rounds accepted")

    print(f"ok: FL accuracy {100 * fl.final_accuracy:.3f}%, loss {fl.history[-1][1]:.4f}"
          f" (round 0: {fl.history[0][1]:.4f}, ln 7 = {math.log(7):.4f})")


if __name__ == "__main__":
    main()
