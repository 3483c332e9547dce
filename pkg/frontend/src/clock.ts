/** Injectable time source so dwell measurements are testable. */
export interface Clock {
  /** Milliseconds; only differences are ever used. */
  now(): number;
}

export const systemClock: Clock = {
  now: () => Date.now(),
};

/** Hand-advanced clock for tests and replays. */
export class ManualClock implements Clock {
  private t: number;

  constructor(start = 0) {
    this.t = start;
  }

  now(): number {
    return this.t;
  }

  advance(ms: number): void {
    if (ms < 0) throw new Error("clock cannot run backwards");
    this.t += ms;
  }
}
