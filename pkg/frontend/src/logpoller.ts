// Offset-based log tailing. Chunks concatenate to exactly the server-side log
// regardless of polling cadence; the caller appends each chunk to the view.

export interface LogSource {
  jobLogs(id: string, offset: number): Promise<{ chunk: string; next_offset: number }>;
}

export class LogPoller {
  private offset = 0;
  text = "";

  constructor(private api: LogSource, private jobId: string) {}

  /** One poll round; returns the newly appended chunk. */
  async poll(): Promise<string> {
    const out = await this.api.jobLogs(this.jobId, this.offset);
    if (out.chunk) {
      this.text += out.chunk;
      this.offset = out.next_offset;
    }
    return out.chunk;
  }

  /** Poll until `stop` returns true (checked between rounds). */
  async follow(onChunk: (chunk: string) => void, stop: () => boolean, intervalMs = 500): Promise<void> {
    while (!stop()) {
      const chunk = await this.poll();
      if (chunk) onChunk(chunk);
      await new Promise((r) => setTimeout(r, intervalMs));
    }
    // final drain so a terminal status cannot race the last lines
    const chunk = await this.poll();
    if (chunk) onChunk(chunk);
  }
}
