/** Application shell: polls the service, renders the dashboard and the
 * current pair card, and turns keystrokes into labels. The annotator only
 * ever sees record attributes; nothing model-side is requested or shown for
 * a pending pair, so there is nothing here to anchor on. */

import {
  fetchQueue,
  fetchReports,
  fetchStatus,
  postAdvance,
  type Report,
  type SessionStatus,
} from "./api";
import { cellText, type CardRow, type PairCard } from "./cards";
import { renderProgress } from "./progress";
import { QueueController } from "./queue";

export const POLL_MS = 1500;

function tokenSpans(row: CardRow, side: "left" | "right"): HTMLElement {
  const cell = document.createElement("td");
  cell.className = side;
  const value = side === "left" ? row.left : row.right;
  if (value === "") {
    const none = document.createElement("em");
    none.className = "empty";
    none.textContent = cellText("");
    cell.appendChild(none);
    return cell;
  }
  const tokens = side === "left" ? row.leftTokens : row.rightTokens;
  for (const tok of tokens) {
    const span = document.createElement("span");
    span.textContent = tok.text;
    span.className = tok.changed ? "tok changed" : "tok";
    cell.appendChild(span);
    cell.appendChild(document.createTextNode(" "));
  }
  return cell;
}

export function renderCard(card: PairCard): HTMLElement {
  const box = document.createElement("div");
  box.className = "pair-card";

  const head = document.createElement("div");
  head.className = "card-head";
  head.textContent = `pair ${card.pairId}`;
  box.appendChild(head);

  const table = document.createElement("table");
  table.className = "attrs";
  const header = document.createElement("tr");
  for (const text of ["attribute", "left record", "right record"]) {
    const th = document.createElement("th");
    th.textContent = text;
    header.appendChild(th);
  }
  table.appendChild(header);
  for (const row of card.rows) {
    const tr = document.createElement("tr");
    tr.className = row.differs ? "row differs" : "row";
    const name = document.createElement("th");
    name.textContent = row.name;
    tr.appendChild(name);
    tr.appendChild(tokenSpans(row, "left"));
    tr.appendChild(tokenSpans(row, "right"));
    table.appendChild(tr);
  }
  box.appendChild(table);
  return box;
}

interface Api {
  status(): Promise<SessionStatus>;
  queue(): Promise<Parameters<QueueController["reconcile"]>[0]>;
  reports(): Promise<Report[]>;
  advance(): Promise<boolean>;
}

const liveApi: Api = {
  status: fetchStatus,
  queue: () => fetchQueue(),
  reports: fetchReports,
  advance: postAdvance,
};

export class App {
  controller: QueueController;
  private api: Api;
  private timer: ReturnType<typeof setInterval> | null = null;
  private banner: HTMLElement;
  private progressMount: HTMLElement;
  private cardMount: HTMLElement;
  private status: SessionStatus | null = null;
  private reports: Report[] = [];
  private advanceSent = false;
  private ticking = false;

  constructor(
    root: HTMLElement,
    api: Api = liveApi,
    controller?: QueueController,
    private pollMs: number = POLL_MS,
  ) {
    this.api = api;
    this.controller = controller ?? new QueueController();
    this.banner = document.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;
    this.progressMount = document.createElement("section");
    this.progressMount.className = "progress-mount";
    this.cardMount = document.createElement("section");
    this.cardMount.className = "card-mount";

    const help = document.createElement("footer");
    help.className = "help";
    help.textContent = "M = match    N = no match    U = undo";

    root.replaceChildren(this.banner, this.progressMount, this.cardMount, help);
    root.addEventListener("keydown", (e) => this.handleKey(e as KeyboardEvent));
  }

  start(): void {
    this.timer = setInterval(() => void this.tick(), this.pollMs);
    void this.tick();
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  handleKey(e: KeyboardEvent): void {
    const key = e.key.toLowerCase();
    if (key === "m") this.controller.stage(1);
    else if (key === "n") this.controller.stage(0);
    else if (key === "u") this.controller.undo();
    else return;
    e.preventDefault();
    this.renderCardArea();
  }

  /** One poll cycle. Exposed so tests can drive it without timers. */
  async tick(): Promise<void> {
    if (this.ticking) return;
    this.ticking = true;
    try {
      this.status = await this.api.status();
      this.reports = await this.api.reports();
      if (this.status.state === "waiting_for_labels") {
        this.controller.reconcile(await this.api.queue());
      } else if (this.status.state !== "ready_to_advance") {
        this.controller.reconcile([]);
      }
      await this.controller.flush();
      if (this.status.state === "ready_to_advance" && !this.advanceSent) {
        // every label landed server-side; kick off the next iteration
        this.advanceSent = await this.api.advance();
      }
      if (this.status.state !== "ready_to_advance") this.advanceSent = false;
      this.setBanner(this.controller.lastError);
    } catch (err) {
      this.setBanner(`server unreachable, retrying: ${String(err)}`);
    } finally {
      this.ticking = false;
    }
    this.render();
  }

  private setBanner(message: string | null): void {
    this.banner.hidden = message === null;
    this.banner.textContent = message ?? "";
  }

  private render(): void {
    if (this.status) {
      this.progressMount.replaceChildren(renderProgress(this.status, this.reports));
    }
    this.renderCardArea();
  }

  private renderCardArea(): void {
    const state = this.status?.state;
    if (state !== "waiting_for_labels") {
      const note = document.createElement("p");
      note.className = state === "ready_to_advance" || state === "running"
        ? "spinner"
        : "idle";
      note.textContent =
        state === "ready_to_advance" || state === "running"
          ? "batch complete, training the next model..."
          : state === "done"
            ? "all iterations finished"
            : "waiting for next iteration";
      this.cardMount.replaceChildren(note);
      return;
    }
    const card = this.controller.current();
    if (!card) {
      const note = document.createElement("p");
      note.className = "spinner";
      note.textContent = this.controller.drained()
        ? "all pairs labeled, delivering..."
        : "delivering labels...";
      this.cardMount.replaceChildren(note);
      return;
    }
    const counterEl = document.createElement("p");
    counterEl.className = "queue-pos";
    counterEl.textContent = `${this.controller.remaining()} of ${this.controller.cards.length} pairs left`;
    const pieces: HTMLElement[] = [counterEl, renderCard(card)];
    for (const [pairId, detail] of this.controller.flagged) {
      const flag = document.createElement("p");
      flag.className = "flag";
      flag.textContent = `${pairId}: ${detail}`;
      pieces.push(flag);
    }
    this.cardMount.replaceChildren(...pieces);
  }
}
