/**
 * The session screen: fetch the current candidate, render it per noise type
 * (pairs side by side, label errors with the label shown), take a yes/no
 * answer by keyboard (y/n) or button, submit, advance. Terminal states show
 * the stop reason and the annotated count and disable all input.
 *
 * The server is the only state holder: a page refresh resumes exactly at
 * the server cursor because this screen keeps nothing but the last response.
 */

import { ApiClient, ApiError, CandidatePayload, NextResponse } from "./api.js";

export interface SentAnswer {
  ids: string[];
  verdict: "yes" | "no";
}

export class SessionScreen {
  /** Every verdict actually sent, in order; mirrors the server journal. */
  readonly sentAnswers: SentAnswer[] = [];
  /** Raw payloads observed, for auditing what the annotator could see. */
  readonly observedPayloads: NextResponse[] = [];
  onRender: ((view: NextResponse) => void) | null = null;

  private current: CandidatePayload | null = null;
  private busy = false;
  private terminal = false;
  private keyHandler: (ev: KeyboardEvent) => void;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly doc: Document = document,
    private readonly preloadTimeoutMs: number = 400,
  ) {
    this.keyHandler = (ev: KeyboardEvent) => {
      if (ev.key === "y" || ev.key === "Y") this.answer("yes");
      else if (ev.key === "n" || ev.key === "N") this.answer("no");
    };
  }

  async start(): Promise<void> {
    this.doc.addEventListener("keydown", this.keyHandler as EventListener);
    await this.refresh();
  }

  stop(): void {
    this.doc.removeEventListener("keydown", this.keyHandler as EventListener);
  }

  isTerminal(): boolean {
    return this.terminal;
  }

  async refresh(): Promise<void> {
    let view: NextResponse;
    try {
      view = await this.api.next(this.sessionId);
    } catch (err) {
      this.renderError(err, () => this.refresh());
      return;
    }
    this.observedPayloads.push(view);
    if (view.candidate) {
      await this.preload(view.candidate.image_urls);
      this.current = view.candidate;
      this.renderCandidate(view);
    } else {
      this.current = null;
      this.terminal = true;
      this.renderTerminal(view.status ?? "unknown", view.annotated_count ?? 0);
    }
    this.onRender?.(view);
  }

  async answer(verdict: "yes" | "no"): Promise<void> {
    if (!this.current || this.busy || this.terminal) return;
    const ids = this.current.ids;
    this.busy = true;
    try {
      await this.api.answer(this.sessionId, ids, verdict);
      this.sentAnswers.push({ ids, verdict });
    } catch (err) {
      if (err instanceof ApiError && err.code === "stale_candidate") {
        // someone else advanced this session; re-sync silently
      } else if (err instanceof ApiError && err.code === "session_terminated") {
        // stop raced us; the refresh below renders the terminal screen
      } else {
        this.busy = false;
        this.renderError(err, () => this.answer(verdict));
        return;
      }
    }
    this.busy = false;
    await this.refresh();
  }

  /** Fetch image bytes into the cache before swapping the screen. */
  private async preload(urls: string[]): Promise<void> {
    await Promise.all(
      urls.map(
        (url) =>
          new Promise<void>((resolve) => {
            try {
              const img = this.doc.createElement("img") as HTMLImageElement;
              img.addEventListener("load", () => resolve());
              img.addEventListener("error", () => resolve());
              img.src = url;
              setTimeout(resolve, this.preloadTimeoutMs); // cap, not a guarantee
            } catch {
              resolve();
            }
          }),
      ),
    );
  }

  private clear(): HTMLElement {
    this.root.innerHTML = "";
    return this.root;
  }

  private renderCandidate(view: NextResponse): void {
    const candidate = view.candidate!;
    const root = this.clear();

    const question = this.doc.createElement("p");
    question.className = "question";
    question.textContent = view.question ?? "";
    root.appendChild(question);

    const holder = this.doc.createElement("div");
    holder.className = candidate.kind === "pair" ? "candidate pair" : "candidate single";
    for (const url of candidate.image_urls) {
      const img = this.doc.createElement("img") as HTMLImageElement;
      img.src = url;
      img.className = candidate.kind === "pair" ? "pair-image" : "single-image";
      holder.appendChild(img);
    }
    root.appendChild(holder);

    if (candidate.label !== undefined && candidate.label !== null) {
      const label = this.doc.createElement("p");
      label.className = "candidate-label";
      label.textContent = `Label: ${candidate.label}`;
      root.appendChild(label);
    }

    const controls = this.doc.createElement("div");
    controls.className = "controls";
    for (const verdict of ["yes", "no"] as const) {
      const button = this.doc.createElement("button");
      button.className = `answer-${verdict}`;
      button.textContent = verdict === "yes" ? "Yes (y)" : "No (n)";
      button.addEventListener("click", () => this.answer(verdict));
      controls.appendChild(button);
    }
    root.appendChild(controls);

    const progress = this.doc.createElement("p");
    progress.className = "progress";
    progress.textContent = `Annotated: ${this.sentAnswers.length}`;
    root.appendChild(progress);
  }

  private renderTerminal(status: string, annotatedCount: number): void {
    const root = this.clear();
    const message = this.doc.createElement("p");
    message.className = "terminal";
    message.textContent =
      status === "stopped_by_criterion"
        ? "Stopped by criterion"
        : status === "exhausted"
          ? "Ranking exhausted"
          : `Session ${status}`;
    root.appendChild(message);

    const count = this.doc.createElement("p");
    count.className = "terminal-count";
    count.textContent = `Annotated: ${annotatedCount}`;
    root.appendChild(count);

    const done = this.doc.createElement("button");
    done.className = "answer-yes";
    done.textContent = "Done";
    done.disabled = true;
    root.appendChild(done);
  }

  private renderError(err: unknown, retry: () => void): void {
    const banner = this.doc.createElement("div");
    banner.className = "error-banner";
    const text = this.doc.createElement("span");
    text.textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : "Network error";
    banner.appendChild(text);
    const button = this.doc.createElement("button");
    button.className = "retry";
    button.textContent = "Retry";
    button.addEventListener("click", () => {
      banner.remove();
      retry();
    });
    banner.appendChild(button);
    this.root.prepend(banner);
  }
}
