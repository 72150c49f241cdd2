from synthengine.review.log import ReviewItem, ReviewQueue, Verdict, read_verdicts

__all__ = ["ReviewItem", "ReviewQueue", "Verdict", "read_verdicts"]
