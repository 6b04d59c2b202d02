"""Catch a receiver who lies during reconstruction.

A dishonest receiver announces a corrupted decision angle but keeps the
true value for private use. The victims decode garbage while the liar
decodes correctly, and that asymmetry is exactly what the key-hash
comparison exposes: the liar's key matches Alice's, everyone else's
differs, so Alice knows who cheated.
"""

from sqss import SimConfig, key_digest, run_session


def show(config: SimConfig) -> None:
    result = run_session(config)
    who = config.dishonest_receiver
    print(f"  dishonest receiver: {'none' if who == 0 else f'Rec-{who}'}")
    print(f"  Alice key hash: {key_digest(result.alice_final_key)[:16]}...")
    for i, key in enumerate(result.receiver_final_keys, start=1):
        match = "matches  " if key == result.alice_final_key else "DIFFERS  "
        print(f"  Rec-{i} key hash: {key_digest(key)[:16]}... {match}")
    verdict = result.verdict
    label = verdict.kind.value
    if verdict.flagged_receiver is not None:
        label += f", flagged Rec-{verdict.flagged_receiver}"
    print(f"  verdict: {label}")
    print()


def main() -> None:
    print("honest baseline, 3 receivers:")
    show(SimConfig(receivers=3, rounds=2000, seed=10))

    print("Rec-1 lies (the measuring receiver):")
    show(SimConfig(receivers=3, rounds=2000, dishonest_receiver=1, seed=11))

    print("Rec-2 lies (a relay receiver):")
    show(SimConfig(receivers=3, rounds=2000, dishonest_receiver=2, seed=12))

    print("note: the liar cannot dodge this by also corrupting their private")
    print("copy, because then no receiver would match Alice and the session")
    print("would abort rather than accept, which still denies them the key.")


if __name__ == "__main__":
    main()
