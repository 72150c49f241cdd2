/** Review session state machine, kept free of DOM concerns so it is testable
 * headless and drivable over a real service. Guarantees: stats are always the
 * server's own numbers (never locally incremented), and no verdict is sent
 * twice for the same item within a session.
 */

import { Decision, QueueClient, QueueStats, ReviewItemView } from './api.js';

export type SessionState =
  | { kind: 'loading' }
  | { kind: 'reviewing'; item: ReviewItemView; stats: QueueStats; notice: string | null }
  | { kind: 'complete'; stats: QueueStats }
  | { kind: 'failed'; message: string };

export type StateListener = (state: SessionState) => void;

export class ReviewSession {
  private state: SessionState = { kind: 'loading' };
  private submitting = false;
  private decided = new Set<string>();
  private lastAction: (() => Promise<void>) | null = null;
  private notice: string | null = null;

  constructor(
    private readonly client: QueueClient,
    private readonly listener: StateListener,
    private readonly reviewer = 'reviewer',
  ) {}

  current(): SessionState {
    return this.state;
  }

  async start(): Promise<void> {
    this.setState({ kind: 'loading' });
    await this.advance();
  }

  /** Re-run the step that failed on a network error; verdicts are only
   * considered sent once the server acknowledged them. */
  async retry(): Promise<void> {
    const action = this.lastAction ?? (() => this.advance());
    await action();
  }

  async decide(decision: Decision): Promise<void> {
    if (this.state.kind !== 'reviewing' || this.submitting) return;
    const item = this.state.item;
    await this.submit(item.id, decision);
  }

  /** Carries the (id, decision) pair itself so a retry after a network
   * failure can re-run it even though the visible state is no longer
   * "reviewing". */
  private async submit(id: string, decision: Decision): Promise<void> {
    if (this.decided.has(id)) return;
    this.lastAction = () => this.submit(id, decision);
    this.submitting = true;
    try {
      const outcome = await this.client.submitVerdict(id, decision, this.reviewer);
      this.decided.add(id);
      if (outcome.kind === 'conflict') {
        this.notice = 'Already adjudicated elsewhere; showing the next item.';
      } else if (outcome.kind === 'not_found') {
        this.notice = 'Item vanished from the queue; showing the next item.';
      } else {
        this.notice = null;
      }
    } catch (err) {
      this.submitting = false;
      this.setState({ kind: 'failed', message: describe(err) });
      return;
    }
    this.submitting = false;
    await this.advance();
  }

  private async advance(): Promise<void> {
    this.lastAction = () => this.advance();
    try {
      const [item, stats] = await Promise.all([this.client.fetchNext(), this.client.fetchStats()]);
      if (item === null) {
        this.setState({ kind: 'complete', stats });
      } else {
        this.setState({ kind: 'reviewing', item, stats, notice: this.notice });
        this.notice = null;
      }
    } catch (err) {
      this.setState({ kind: 'failed', message: describe(err) });
    }
  }

  private setState(state: SessionState): void {
    this.state = state;
    this.listener(state);
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
