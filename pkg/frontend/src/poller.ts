export interface PollerHooks<T> {
  onData: (value: T) => void;
  onError?: (err: unknown) => void;
}

/** Pulls a value on a fixed interval.  Overlapping ticks coalesce: while a
 *  pull is in flight, timer fires are dropped rather than queued, so a slow
 *  server never builds a backlog of requests. */
export class Poller<T> {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  /** false until the first successful pull, and after any failed one */
  online = false;

  constructor(
    private readonly pull: () => Promise<T>,
    readonly intervalMs: number,
    private readonly hooks: PollerHooks<T>,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async tick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const value = await this.pull();
      this.online = true;
      this.hooks.onData(value);
    } catch (err) {
      this.online = false;
      this.hooks.onError?.(err);
    } finally {
      this.inFlight = false;
    }
  }
}
