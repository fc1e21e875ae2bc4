// Request plumbing: newest-wins mesh fetching and debounced triggers.

/**
 * At most one logical in-flight request per panel; stale responses never
 * reach the callback. Older fetches are also aborted so the server can drop
 * them, but abortion is an optimization: ordering is enforced by sequence
 * numbers, so even an un-abortable late response is discarded.
 */
export class LatestWins {
  private seq = 0;
  private controller: AbortController | null = null;

  async run<T>(
    fn: (signal: AbortSignal) => Promise<T>,
    onFresh: (value: T) => void,
    onError?: (err: unknown) => void
  ): Promise<void> {
    const id = ++this.seq;
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      const value = await fn(controller.signal);
      if (id === this.seq) onFresh(value);
    } catch (err) {
      if (id === this.seq && !controller.signal.aborted) onError?.(err);
    }
  }

  /** True when a newer request has been issued since `idWhenStarted`. */
  get current(): number {
    return this.seq;
  }
}

export class Debouncer {
  private handle: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly delayMs: number = 150) {}

  schedule(op: () => void): void {
    if (this.handle !== null) clearTimeout(this.handle);
    this.handle = setTimeout(() => {
      this.handle = null;
      op();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.handle !== null) clearTimeout(this.handle);
    this.handle = null;
  }
}
