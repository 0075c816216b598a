/** Client-side queue state: the server decides which pairs are pending and
 * in what order; this controller only tracks the annotator's place in that
 * list. Labeling advances optimistically, and each decision waits out a
 * short grace window before the POST goes out so it can be undone. */

import { postLabel, type LabelOutcome, type QueueItem } from "./api";
import { buildCard, type PairCard } from "./cards";

export const GRACE_MS = 800;

interface StagedLabel {
  pairId: string;
  label: 0 | 1;
  at: number;
}

export type Sender = (pairId: string, label: 0 | 1) => Promise<LabelOutcome>;

export class QueueController {
  cards: PairCard[] = [];
  /** pair_id -> conflict detail from the server */
  flagged = new Map<string, string>();
  /** network failure message for the banner, null when healthy */
  lastError: string | null = null;

  private staged: StagedLabel[] = [];
  private inFlight = new Set<string>();
  private accepted = new Set<string>();

  constructor(
    private sender: Sender = postLabel,
    private clock: () => number = () => Date.now(),
    private graceMs: number = GRACE_MS,
  ) {}

  /** Replace the queue with the server's current list. Staged and accepted
   * marks for pairs the server no longer lists are dropped; their cards are
   * done for good. */
  reconcile(items: QueueItem[]): void {
    this.cards = items.map(buildCard);
    const listed = new Set(items.map((i) => i.pair_id));
    this.staged = this.staged.filter((s) => listed.has(s.pairId));
    for (const set of [this.accepted, this.inFlight]) {
      for (const pid of [...set]) if (!listed.has(pid)) set.delete(pid);
    }
    for (const pid of [...this.flagged.keys()]) {
      if (!listed.has(pid)) this.flagged.delete(pid);
    }
  }

  private isPending(pairId: string): boolean {
    return (
      !this.accepted.has(pairId) &&
      !this.inFlight.has(pairId) &&
      !this.flagged.has(pairId) &&
      !this.staged.some((s) => s.pairId === pairId)
    );
  }

  /** The card the annotator should look at now. */
  current(): PairCard | null {
    return this.cards.find((c) => this.isPending(c.pairId)) ?? null;
  }

  /** Cards not yet decided locally (current one included). */
  remaining(): number {
    return this.cards.filter((c) => this.isPending(c.pairId)).length;
  }

  /** Label the current card and advance. Returns the next card. */
  stage(label: 0 | 1): PairCard | null {
    const card = this.current();
    if (!card) return null;
    this.staged.push({ pairId: card.pairId, label, at: this.clock() });
    return this.current();
  }

  /** Take back the newest decision that has not been sent yet. */
  undo(): PairCard | null {
    const last = this.staged.pop();
    if (!last) return null;
    return this.cards.find((c) => c.pairId === last.pairId) ?? null;
  }

  /** Send every staged label older than the grace window. */
  async flush(force = false): Promise<void> {
    const now = this.clock();
    const due = this.staged.filter((s) => force || now - s.at >= this.graceMs);
    if (due.length === 0) return;
    this.staged = this.staged.filter((s) => !due.includes(s));
    for (const s of due) this.inFlight.add(s.pairId);
    const results = await Promise.allSettled(
      due.map(async (s) => ({ s, outcome: await this.sender(s.pairId, s.label) })),
    );
    for (const result of results) {
      if (result.status === "rejected") {
        // network trouble: put the label back and retry next flush
        const failed = due[results.indexOf(result)];
        this.inFlight.delete(failed.pairId);
        this.staged.push(failed);
        this.lastError = String(result.reason);
        continue;
      }
      const { s, outcome } = result.value;
      this.inFlight.delete(s.pairId);
      this.lastError = null;
      if (outcome.ok) {
        this.accepted.add(s.pairId);
      } else if (outcome.conflict) {
        this.flagged.set(s.pairId, outcome.detail);
      } else {
        this.staged.push(s);
        this.lastError = outcome.detail;
      }
    }
  }

  /** True once every listed card has been decided and delivered. */
  drained(): boolean {
    return (
      this.cards.length > 0 &&
      this.remaining() === 0 &&
      this.staged.length === 0 &&
      this.inFlight.size === 0
    );
  }
}
