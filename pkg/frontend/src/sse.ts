/** Job progress subscription over server-sent events.
 *
 * The service replays every epoch event from 0 on each connection, so a
 * reconnect resynchronizes from GET /jobs/{id} and then deduplicates by
 * epoch index: consumers see a gap-free, strictly increasing sequence no
 * matter how often the stream drops.
 */

import type { EpochEvent, JobInfo, JobState } from "./types.js";
import { isTerminal } from "./types.js";

export interface EventSourceLike {
  addEventListener(type: string, listener: (ev: MessageEvent<string>) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface JobStreamHandlers {
  onEpoch(event: EpochEvent): void;
  onResync?(job: JobInfo): void;
  onEnd(state: JobState): void;
}

export class JobEventStream {
  private lastEpoch = -1;
  private source: EventSourceLike | null = null;
  private finished = false;

  constructor(
    private readonly url: string,
    private readonly factory: EventSourceFactory,
    private readonly fetchJob: () => Promise<JobInfo>,
    private readonly handlers: JobStreamHandlers,
    private readonly retryDelayMs = 500,
  ) {}

  start(): void {
    this.open();
  }

  close(): void {
    this.finished = true;
    this.source?.close();
    this.source = null;
  }

  get lastSeenEpoch(): number {
    return this.lastEpoch;
  }

  private open(): void {
    if (this.finished) return;
    const source = this.factory(this.url);
    this.source = source;
    source.addEventListener("epoch", (ev) => {
      const event = JSON.parse(ev.data) as EpochEvent;
      if (event.epoch > this.lastEpoch) {
        this.lastEpoch = event.epoch;
        this.handlers.onEpoch(event);
      }
    });
    source.addEventListener("end", (ev) => {
      const payload = JSON.parse(ev.data) as { state: JobState };
      this.finish(payload.state);
    });
    source.addEventListener("error", () => {
      void this.recover(source);
    });
  }

  private finish(state: JobState): void {
    if (this.finished) return;
    this.finished = true;
    this.source?.close();
    this.source = null;
    this.handlers.onEnd(state);
  }

  private async recover(broken: EventSourceLike): Promise<void> {
    if (this.finished || this.source !== broken) return;
    broken.close();
    this.source = null;
    let job: JobInfo;
    try {
      job = await this.fetchJob();
    } catch {
      setTimeout(() => this.open(), this.retryDelayMs);
      return;
    }
    this.handlers.onResync?.(job);
    if (isTerminal(job.state)) {
      this.finish(job.state);
      return;
    }
    setTimeout(() => this.open(), this.retryDelayMs);
  }
}
