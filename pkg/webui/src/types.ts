/** Wire types for the challenge-search HTTP API. */

export interface SearchResult {
  id: string;
  rank: number;
  title: string;
  daily_action: string;
  wish: string;
  description: string;
  retrieval_score: number;
  rerank_score: number;
  validated: boolean;
}

export interface SearchResponse {
  query: string;
  degraded: boolean;
  results: SearchResult[];
}

export interface HealthResponse {
  status: string;
  corpus_size: number;
  provider_tag: string;
}
