/** Review session state machine, kept free of DOM concerns so it is testable
 * headless and drivable over a real service. Guarantees: stats are always the
 * server's own numbers (never locally incremented), and no verdict is sent
 * twice for the same item within a session.
 */
export class ReviewSession {
    constructor(client, listener, reviewer = 'reviewer') {
        this.client = client;
        this.listener = listener;
        this.reviewer = reviewer;
        this.state = { kind: 'loading' };
        this.submitting = false;
        this.decided = new Set();
        this.lastAction = null;
        this.notice = null;
    }
    current() {
        return this.state;
    }
    async start() {
        this.setState({ kind: 'loading' });
        await this.advance();
    }
    /** Re-run the step that failed on a network error; verdicts are only
     * considered sent once the server acknowledged them. */
    async retry() {
        const action = this.lastAction ?? (() => this.advance());
        await action();
    }
    async decide(decision) {
        if (this.state.kind !== 'reviewing' || this.submitting)
            return;
        const item = this.state.item;
        await this.submit(item.id, decision);
    }
    /** Carries the (id, decision) pair itself so a retry after a network
     * failure can re-run it even though the visible state is no longer
     * "reviewing". */
    async submit(id, decision) {
        if (this.decided.has(id))
            return;
        this.lastAction = () => this.submit(id, decision);
        this.submitting = true;
        try {
            const outcome = await this.client.submitVerdict(id, decision, this.reviewer);
            this.decided.add(id);
            if (outcome.kind === 'conflict') {
                this.notice = 'Already adjudicated elsewhere; showing the next item.';
            }
            else if (outcome.kind === 'not_found') {
                this.notice = 'Item vanished from the queue; showing the next item.';
            }
            else {
                this.notice = null;
            }
        }
        catch (err) {
            this.submitting = false;
            this.setState({ kind: 'failed', message: describe(err) });
            return;
        }
        this.submitting = false;
        await this.advance();
    }
    async advance() {
        this.lastAction = () => this.advance();
        try {
            const [item, stats] = await Promise.all([this.client.fetchNext(), this.client.fetchStats()]);
            if (item === null) {
                this.setState({ kind: 'complete', stats });
            }
            else {
                this.setState({ kind: 'reviewing', item, stats, notice: this.notice });
                this.notice = null;
            }
        }
        catch (err) {
            this.setState({ kind: 'failed', message: describe(err) });
        }
    }
    setState(state) {
        this.state = state;
        this.listener(state);
    }
}
function describe(err) {
    return err instanceof Error ? err.message : String(err);
}
