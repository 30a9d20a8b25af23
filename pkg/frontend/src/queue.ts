// Keeps rapid re-submissions sane: only the newest request's result lands.

export class LatestWins<TIn, TOut> {
  private generation = 0;

  constructor(private readonly work: (input: TIn) => Promise<TOut>) {}

  /**
   * Run the work; resolve with its result if no newer submission arrived
   * meanwhile, with null if this one was superseded. Errors from stale
   * submissions are swallowed (their outcome no longer matters); errors
   * from the current one propagate.
   */
  async submit(input: TIn): Promise<TOut | null> {
    const ticket = ++this.generation;
    try {
      const result = await this.work(input);
      return ticket === this.generation ? result : null;
    } catch (err) {
      if (ticket === this.generation) throw err;
      return null;
    }
  }

  get pendingGeneration(): number {
    return this.generation;
  }
}
